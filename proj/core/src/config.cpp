#include "sim2real/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fmt/format.h>
#include <set>

#include "sim2real/error.hpp"
#include "sim2real/fs_util.hpp"

namespace sim2real {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- TOML values

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::string s = fmt::format("{}", v);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

class ValueParser {
 public:
  ValueParser(const std::string& text, std::size_t pos) : s_(text), i_(pos) {}

  TomlValue value() {
    skip_ws();
    if (i_ >= s_.size()) fail("missing value");
    const char c = s_[i_];
    if (c == '"') return TomlValue{string()};
    if (c == '[') return array();
    if (s_.compare(i_, 4, "true") == 0) {
      i_ += 4;
      return TomlValue{true};
    }
    if (s_.compare(i_, 5, "false") == 0) {
      i_ += 5;
      return TomlValue{false};
    }
    return number();
  }

  void skip_ws() {
    while (i_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(s_[i_]))) {
        ++i_;
      } else if (s_[i_] == '#') {
        while (i_ < s_.size() && s_[i_] != '\n') ++i_;
      } else {
        break;
      }
    }
  }

  std::size_t pos() const { return i_; }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw InputError(fmt::format("{} at offset {} in '{}'", what, i_, s_));
  }

  std::string string() {
    ++i_;
    std::string out;
    while (i_ < s_.size() && s_[i_] != '"') {
      char c = s_[i_++];
      if (c == '\\') {
        if (i_ >= s_.size()) fail("unterminated escape");
        const char e = s_[i_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case 'r': c = '\r'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(fmt::format("unsupported escape \\{}", e));
        }
      } else if (c == '\n') {
        fail("newline in string");
      }
      out += c;
    }
    if (i_ >= s_.size()) fail("unterminated string");
    ++i_;
    return out;
  }

  TomlValue array() {
    ++i_;
    std::vector<TomlValue> items;
    skip_ws();
    while (i_ < s_.size() && s_[i_] != ']') {
      items.push_back(value());
      skip_ws();
      if (i_ < s_.size() && s_[i_] == ',') {
        ++i_;
        skip_ws();
      } else if (i_ < s_.size() && s_[i_] != ']') {
        fail("expected ',' or ']'");
      }
    }
    if (i_ >= s_.size()) fail("unterminated array");
    ++i_;
    return TomlValue{std::move(items)};
  }

  TomlValue number() {
    const std::size_t start = i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '+' ||
                              s_[i_] == '-' || s_[i_] == '.' || s_[i_] == '_')) {
      ++i_;
    }
    std::string tok = s_.substr(start, i_ - start);
    std::erase(tok, '_');
    if (tok.empty()) fail("expected a value");
    if (tok == "inf" || tok == "+inf") return TomlValue{INFINITY};
    if (tok == "-inf") return TomlValue{-INFINITY};
    if (tok == "nan" || tok == "+nan" || tok == "-nan") return TomlValue{NAN};
    const bool is_float = tok.find_first_of(".eE") != std::string::npos;
    try {
      std::size_t used = 0;
      if (is_float) {
        const double v = std::stod(tok, &used);
        if (used == tok.size()) return TomlValue{v};
      } else {
        const long long v = std::stoll(tok, &used, 10);
        if (used == tok.size()) return TomlValue{static_cast<std::int64_t>(v)};
      }
    } catch (const std::exception&) {
    }
    fail(fmt::format("cannot parse '{}'", tok));
  }

  const std::string& s_;
  std::size_t i_;
};

bool brackets_balanced(const std::string& text) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
    } else if (c == '"') {
      in_string = true;
    } else if (c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      --depth;
    }
  }
  return depth <= 0;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  }
  return true;
}

}  // namespace

std::string TomlValue::to_toml() const {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return fmt::format("{}", v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return quote(v);
        } else {
          std::string out = "[";
          for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i].to_toml();
          return out + "]";
        }
      },
      data);
}

TomlValue parse_toml_value(const std::string& text) {
  ValueParser p(text, 0);
  TomlValue v = p.value();
  p.skip_ws();
  if (p.pos() != text.size()) throw InputError(fmt::format("trailing characters after value in '{}'", text));
  return v;
}

TomlDocument TomlDocument::parse(const std::string& text, const std::string& source) {
  TomlDocument doc;
  doc.sections_.emplace_back("", std::vector<std::pair<std::string, TomlValue>>{});
  std::vector<std::string> lines;
  {
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto nl = text.find('\n', start);
      lines.push_back(text.substr(start, nl == std::string::npos ? std::string::npos : nl - start));
      if (nl == std::string::npos) break;
      start = nl + 1;
    }
  }
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::size_t first_line = ln + 1;
    std::string line = trim(lines[ln]);
    if (line.empty() || line[0] == '#') continue;
    auto where = [&](const std::string& msg) {
      return InputError(fmt::format("{}:{}: {}", source, first_line, msg));
    };
    if (line[0] == '[') {
      const auto close = line.find(']');
      if (close == std::string::npos) throw where("unterminated section header");
      const std::string rest = trim(line.substr(close + 1));
      if (!rest.empty() && rest[0] != '#') throw where("text after section header");
      const std::string name = trim(line.substr(1, close - 1));
      if (!valid_key(name)) throw where(fmt::format("bad section name '{}'", name));
      for (const auto& s : doc.sections_) {
        if (s.first == name) throw where(fmt::format("section [{}] repeated", name));
      }
      doc.sections_.emplace_back(name, std::vector<std::pair<std::string, TomlValue>>{});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw where("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) throw where(fmt::format("bad key '{}'", key));
    std::string value_text = trim(line.substr(eq + 1));
    while (!brackets_balanced(value_text) && ln + 1 < lines.size()) value_text += "\n" + lines[++ln];
    TomlValue value;
    try {
      ValueParser p(value_text, 0);
      value = p.value();
      p.skip_ws();
      if (p.pos() != value_text.size()) throw InputError("trailing characters after value");
    } catch (const InputError& e) {
      throw where(e.what());
    }
    auto& entries = doc.sections_.back().second;
    for (const auto& kv : entries) {
      if (kv.first == key) throw where(fmt::format("key '{}' repeated", key));
    }
    entries.emplace_back(key, std::move(value));
  }
  return doc;
}

TomlDocument TomlDocument::load(const fs::path& path) {
  if (!fs::exists(path)) throw IoError(fmt::format("config file not found: {}", path.string()));
  return parse(read_text(path), path.string());
}

void TomlDocument::set(const std::string& dotted_key, TomlValue value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos) throw InputError(fmt::format("override key '{}' needs the form section.key", dotted_key));
  const std::string section = dotted_key.substr(0, dot), key = dotted_key.substr(dot + 1);
  if (!valid_key(section) || !valid_key(key)) throw InputError(fmt::format("bad override key '{}'", dotted_key));
  auto it = std::find_if(sections_.begin(), sections_.end(), [&](const auto& s) { return s.first == section; });
  if (it == sections_.end()) {
    sections_.emplace_back(section, std::vector<std::pair<std::string, TomlValue>>{});
    it = std::prev(sections_.end());
  }
  for (auto& kv : it->second) {
    if (kv.first == key) {
      kv.second = std::move(value);
      return;
    }
  }
  it->second.emplace_back(key, std::move(value));
}

void TomlDocument::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw InputError(fmt::format("override '{}' needs the form section.key=value", assignment));
  const std::string key = trim(assignment.substr(0, eq));
  const std::string text = trim(assignment.substr(eq + 1));
  TomlValue value;
  try {
    value = parse_toml_value(text);
  } catch (const InputError&) {
    value = TomlValue{text};
  }
  set(key, std::move(value));
}

const TomlValue* TomlDocument::find(const std::string& section, const std::string& key) const {
  for (const auto& s : sections_) {
    if (s.first != section) continue;
    for (const auto& kv : s.second) {
      if (kv.first == key) return &kv.second;
    }
  }
  return nullptr;
}

std::vector<std::string> TomlDocument::keys(const std::string& section) const {
  std::vector<std::string> out;
  for (const auto& s : sections_) {
    if (s.first == section) {
      for (const auto& kv : s.second) out.push_back(kv.first);
    }
  }
  return out;
}

std::vector<std::string> TomlDocument::sections() const {
  std::vector<std::string> out;
  for (const auto& s : sections_) out.push_back(s.first);
  return out;
}

// ---------------------------------------------------------------- experiment

std::string_view to_string(AblationId id) {
  switch (id) {
    case AblationId::Baseline: return "baseline";
    case AblationId::Ours: return "ours";
    case AblationId::OursCg: return "ours_cg";
    case AblationId::OursAltB: return "ours_altB";
  }
  return "?";
}

AblationId ablation_from_string(std::string_view s) {
  if (s == "baseline") return AblationId::Baseline;
  if (s == "ours") return AblationId::Ours;
  if (s == "ours_cg") return AblationId::OursCg;
  if (s == "ours_altB") return AblationId::OursAltB;
  throw InputError(fmt::format("unknown ablation_id '{}' (expected baseline, ours, ours_cg or ours_altB)", s));
}

namespace {

class Reader {
 public:
  Reader(const TomlDocument& doc, fs::path base) : doc_(doc), base_(std::move(base)) {}

  template <typename T>
  void get(const std::string& section, const std::string& key, T& out) {
    const TomlValue* v = doc_.find(section, key);
    used_.insert(section + "." + key);
    if (v == nullptr) return;
    try {
      convert(*v, out);
    } catch (const InputError& e) {
      throw InputError(fmt::format("config key {}.{}: {}", section, key, e.what()));
    }
  }

  void check_unused() const {
    for (const auto& section : doc_.sections()) {
      for (const auto& key : doc_.keys(section)) {
        const std::string full = section.empty() ? key : section + "." + key;
        if (!used_.count(full)) throw InputError(fmt::format("unknown config key '{}'", full));
      }
    }
  }

 private:
  static void convert(const TomlValue& v, bool& out) {
    if (auto p = std::get_if<bool>(&v.data)) {
      out = *p;
      return;
    }
    throw InputError("expected a boolean");
  }
  static void convert(const TomlValue& v, int& out) {
    std::int64_t x = 0;
    convert(v, x);
    if (x < INT32_MIN || x > INT32_MAX) throw InputError("integer out of range");
    out = static_cast<int>(x);
  }
  static void convert(const TomlValue& v, std::int64_t& out) {
    if (auto p = std::get_if<std::int64_t>(&v.data)) {
      out = *p;
      return;
    }
    throw InputError("expected an integer");
  }
  static void convert(const TomlValue& v, std::uint64_t& out) {
    std::int64_t x = 0;
    convert(v, x);
    if (x < 0) throw InputError("expected a nonnegative integer");
    out = static_cast<std::uint64_t>(x);
  }
  static void convert(const TomlValue& v, double& out) {
    if (auto p = std::get_if<double>(&v.data)) {
      out = *p;
    } else if (auto q = std::get_if<std::int64_t>(&v.data)) {
      out = static_cast<double>(*q);
    } else {
      throw InputError("expected a number");
    }
  }
  static void convert(const TomlValue& v, std::string& out) {
    if (auto p = std::get_if<std::string>(&v.data)) {
      out = *p;
      return;
    }
    throw InputError("expected a string");
  }
  void convert(const TomlValue& v, fs::path& out) const {
    std::string s;
    convert(v, s);
    out = resolve(s);
  }
  template <typename T>
  void convert(const TomlValue& v, std::vector<T>& out) const {
    auto p = std::get_if<std::vector<TomlValue>>(&v.data);
    if (!p) throw InputError("expected an array");
    out.clear();
    for (const auto& item : *p) {
      T x{};
      convert(item, x);
      out.push_back(std::move(x));
    }
  }

 public:
  fs::path resolve(const std::string& s) const {
    if (s.empty()) return {};
    fs::path p(s);
    if (p.is_relative()) p = base_ / p;
    return p.lexically_normal();
  }

 private:
  const TomlDocument& doc_;
  fs::path base_;
  std::set<std::string> used_;
};

std::string model_entry_resolve(const Reader& r, const std::string& entry) {
  const auto eq = entry.find('=');
  if (eq == std::string::npos) throw InputError(fmt::format("grid model '{}' needs the form label=path", entry));
  return entry.substr(0, eq + 1) + r.resolve(entry.substr(eq + 1)).string();
}

}  // namespace

void ExperimentConfig::finalize() {
  translation.seed = seed;
  translation.histogram = histogram;
  depth.seed = seed;
  depth.augmentation.seed = seed;
  if (ablation_id == AblationId::OursCg) translation.weights.lambda_mi = 0.0;
  histogram.validate();
  translation.validate();
  depth.validate();
  if (translation_checkpoint_every < 1) throw RangeError("translation.checkpoint_every must be >= 1");
  if (depth_checkpoint_every < 1) throw RangeError("depth.checkpoint_every must be >= 1");
  if (!(depth_strict_max_mse > 0.0)) throw RangeError("depth.strict_max_mse must be > 0");
  if (eval.mi_bins < 2) throw RangeError("eval.mi_bins must be >= 2");
  if (eval.kid_subset_size < 2 || eval.kid_subsets < 1) throw RangeError("eval KID subset settings must be >= 2 and >= 1");
  if (data.preprocess && (data.spec.target_width < 8 || data.spec.target_height < 8)) {
    throw RangeError("data target size must be at least 8x8");
  }
  for (const auto& c : ablation.cells) {
    const AblationId id = ablation_from_string(c);
    if (id == AblationId::OursAltB) throw InputError("list alternative domain-B manifests in ablation.alt_domain_b instead of an ours_altB cell");
  }
  if (ablation_id == AblationId::OursAltB && domain_b.empty()) throw InputError("ours_altB needs experiment.domain_b");
  if (toy.pairs < 1 || toy.resolution < 8 || toy.eval_frames < 0) throw RangeError("toy settings out of range");
}

ExperimentConfig experiment_from_toml(const TomlDocument& doc, const fs::path& base_dir) {
  ExperimentConfig c;
  Reader r(doc, base_dir);
  std::string ablation = std::string(to_string(c.ablation_id));
  r.get("experiment", "name", c.name);
  r.get("experiment", "ablation_id", ablation);
  c.ablation_id = ablation_from_string(ablation);
  r.get("experiment", "domain_a", c.domain_a);
  r.get("experiment", "domain_b", c.domain_b);
  r.get("experiment", "eval_manifest", c.eval_manifest);
  std::string out_dir = c.output_dir.string();
  r.get("experiment", "output_dir", out_dir);
  r.get("experiment", "seed", c.seed);

  r.get("data", "preprocess", c.data.preprocess);
  r.get("data", "crop_top", c.data.spec.margins.top);
  r.get("data", "crop_bottom", c.data.spec.margins.bottom);
  r.get("data", "crop_left", c.data.spec.margins.left);
  r.get("data", "crop_right", c.data.spec.margins.right);
  r.get("data", "target_width", c.data.spec.target_width);
  r.get("data", "target_height", c.data.spec.target_height);

  auto& t = c.translation;
  std::string variant = std::string(to_string(t.gan_variant));
  r.get("translation", "lambda_gan", t.weights.lambda_gan);
  r.get("translation", "lambda_cyc", t.weights.lambda_cyc);
  r.get("translation", "lambda_mi", t.weights.lambda_mi);
  r.get("translation", "epochs", t.epochs);
  r.get("translation", "learning_rate", t.learning_rate);
  r.get("translation", "beta1", t.beta1);
  r.get("translation", "beta2", t.beta2);
  r.get("translation", "batch_size", t.batch_size);
  r.get("translation", "gan_variant", variant);
  t.gan_variant = gan_variant_from_string(variant);
  r.get("translation", "generator_width", t.generator.base_width);
  r.get("translation", "generator_blocks", t.generator.n_res_blocks);
  r.get("translation", "discriminator_width", t.discriminator.base_width);
  r.get("translation", "identity_weight", t.identity_weight);
  r.get("translation", "pool_size", t.pool_size);
  r.get("translation", "linear_decay", t.linear_decay);
  r.get("translation", "checkpoint_every", c.translation_checkpoint_every);

  auto& d = c.depth;
  r.get("depth", "epochs", d.epochs);
  r.get("depth", "learning_rate", d.learning_rate);
  r.get("depth", "beta1", d.beta1);
  r.get("depth", "beta2", d.beta2);
  r.get("depth", "batch_size", d.batch_size);
  r.get("depth", "crop_size", d.augmentation.crop_size);
  r.get("depth", "hflip", d.augmentation.allow_hflip);
  r.get("depth", "vflip", d.augmentation.allow_vflip);
  r.get("depth", "inference_width", d.inference_width);
  r.get("depth", "inference_height", d.inference_height);
  r.get("depth", "blocks", d.model.blocks);
  r.get("depth", "base_width", d.model.base_width);
  r.get("depth", "label_scale", d.model.label_scale);
  r.get("depth", "min_depth_mm", d.model.min_depth_mm);
  r.get("depth", "train_manifest", c.depth_train_manifest);
  r.get("depth", "strict_max_mse", c.depth_strict_max_mse);
  r.get("depth", "checkpoint_every", c.depth_checkpoint_every);

  auto& h = c.histogram;
  r.get("histogram", "n_bins", h.n_bins);
  r.get("histogram", "depth_min", h.depth_min);
  r.get("histogram", "depth_max", h.depth_max);
  r.get("histogram", "intensity_min", h.intensity_min);
  r.get("histogram", "intensity_max", h.intensity_max);
  r.get("histogram", "bandwidth", h.soft_bandwidth);

  r.get("eval", "extractor_seed", c.eval.extractor_seed);
  r.get("eval", "kid_subset_size", c.eval.kid_subset_size);
  r.get("eval", "kid_subsets", c.eval.kid_subsets);
  r.get("eval", "mi_bins", c.eval.mi_bins);

  r.get("translate_dataset", "checkpoint", c.translate_dataset.checkpoint);
  r.get("translate_dataset", "manifest", c.translate_dataset.manifest);

  r.get("evaluate", "checkpoint", c.evaluate.checkpoint);
  r.get("evaluate", "manifest", c.evaluate.manifest);
  r.get("evaluate", "inject_gt", c.evaluate.inject_gt);
  r.get("evaluate", "translation_metrics", c.evaluate.translation_metrics);
  r.get("evaluate", "images_real", c.evaluate.images_real);
  r.get("evaluate", "images_fake", c.evaluate.images_fake);

  r.get("grid", "frames", c.grid.frames);
  r.get("grid", "models", c.grid.models);
  for (auto& m : c.grid.models) m = model_entry_resolve(r, m);
  r.get("grid", "max_frames", c.grid.max_frames);

  r.get("ablation", "cells", c.ablation.cells);
  r.get("ablation", "alt_domain_b", c.ablation.alt_domain_b);
  r.get("ablation", "seeds", c.ablation.seeds);
  r.get("ablation", "parallel", c.ablation.parallel);

  r.get("toy", "pairs", c.toy.pairs);
  r.get("toy", "resolution", c.toy.resolution);
  r.get("toy", "eval_frames", c.toy.eval_frames);

  r.check_unused();

  fs::path out(out_dir);
  if (out.is_relative()) {
    const char* root = std::getenv("S2R_OUTPUT_ROOT");
    out = (root && *root) ? fs::path(root) / out : fs::current_path() / out;
  }
  c.output_dir = fs::absolute(out).lexically_normal();
  c.finalize();
  return c;
}

ExperimentConfig load_experiment(const fs::path& path, const std::vector<std::string>& overrides) {
  TomlDocument doc = TomlDocument::load(path);
  for (const auto& o : overrides) doc.apply_override(o);
  return experiment_from_toml(doc, fs::absolute(path).parent_path());
}

namespace {

class Writer {
 public:
  void section(const std::string& name) {
    if (!text_.empty()) text_ += '\n';
    text_ += "[" + name + "]\n";
  }
  void kv(const std::string& key, const TomlValue& v) { text_ += key + " = " + v.to_toml() + "\n"; }
  void kv(const std::string& key, bool v) { kv(key, TomlValue{v}); }
  void kv(const std::string& key, int v) { kv(key, TomlValue{static_cast<std::int64_t>(v)}); }
  void kv(const std::string& key, std::uint64_t v) { kv(key, TomlValue{static_cast<std::int64_t>(v)}); }
  void kv(const std::string& key, double v) { kv(key, TomlValue{v}); }
  void kv(const std::string& key, const std::string& v) { kv(key, TomlValue{v}); }
  void kv(const std::string& key, std::string_view v) { kv(key, TomlValue{std::string(v)}); }
  void kv(const std::string& key, const fs::path& v) { kv(key, TomlValue{v.string()}); }
  template <typename T>
  void kv(const std::string& key, const std::vector<T>& v) {
    std::vector<TomlValue> items;
    for (const auto& x : v) {
      if constexpr (std::is_same_v<T, fs::path>) items.push_back(TomlValue{x.string()});
      else if constexpr (std::is_same_v<T, std::string>) items.push_back(TomlValue{x});
      else items.push_back(TomlValue{static_cast<std::int64_t>(x)});
    }
    kv(key, TomlValue{std::move(items)});
  }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

}  // namespace

std::string to_toml(const ExperimentConfig& c) {
  Writer w;
  w.section("experiment");
  w.kv("name", c.name);
  w.kv("ablation_id", to_string(c.ablation_id));
  w.kv("domain_a", c.domain_a);
  w.kv("domain_b", c.domain_b);
  w.kv("eval_manifest", c.eval_manifest);
  w.kv("output_dir", c.output_dir);
  w.kv("seed", c.seed);

  w.section("data");
  w.kv("preprocess", c.data.preprocess);
  w.kv("crop_top", c.data.spec.margins.top);
  w.kv("crop_bottom", c.data.spec.margins.bottom);
  w.kv("crop_left", c.data.spec.margins.left);
  w.kv("crop_right", c.data.spec.margins.right);
  w.kv("target_width", c.data.spec.target_width);
  w.kv("target_height", c.data.spec.target_height);

  const auto& t = c.translation;
  w.section("translation");
  w.kv("lambda_gan", t.weights.lambda_gan);
  w.kv("lambda_cyc", t.weights.lambda_cyc);
  w.kv("lambda_mi", t.weights.lambda_mi);
  w.kv("epochs", t.epochs);
  w.kv("learning_rate", t.learning_rate);
  w.kv("beta1", t.beta1);
  w.kv("beta2", t.beta2);
  w.kv("batch_size", t.batch_size);
  w.kv("gan_variant", to_string(t.gan_variant));
  w.kv("generator_width", t.generator.base_width);
  w.kv("generator_blocks", t.generator.n_res_blocks);
  w.kv("discriminator_width", t.discriminator.base_width);
  w.kv("identity_weight", t.identity_weight);
  w.kv("pool_size", t.pool_size);
  w.kv("linear_decay", t.linear_decay);
  w.kv("checkpoint_every", c.translation_checkpoint_every);

  const auto& d = c.depth;
  w.section("depth");
  w.kv("epochs", d.epochs);
  w.kv("learning_rate", d.learning_rate);
  w.kv("beta1", d.beta1);
  w.kv("beta2", d.beta2);
  w.kv("batch_size", d.batch_size);
  w.kv("crop_size", d.augmentation.crop_size);
  w.kv("hflip", d.augmentation.allow_hflip);
  w.kv("vflip", d.augmentation.allow_vflip);
  w.kv("inference_width", d.inference_width);
  w.kv("inference_height", d.inference_height);
  w.kv("blocks", d.model.blocks);
  w.kv("base_width", d.model.base_width);
  w.kv("label_scale", d.model.label_scale);
  w.kv("min_depth_mm", d.model.min_depth_mm);
  w.kv("train_manifest", c.depth_train_manifest);
  w.kv("strict_max_mse", c.depth_strict_max_mse);
  w.kv("checkpoint_every", c.depth_checkpoint_every);

  const auto& h = c.histogram;
  w.section("histogram");
  w.kv("n_bins", h.n_bins);
  w.kv("depth_min", h.depth_min);
  w.kv("depth_max", h.depth_max);
  w.kv("intensity_min", h.intensity_min);
  w.kv("intensity_max", h.intensity_max);
  w.kv("bandwidth", h.soft_bandwidth);

  w.section("eval");
  w.kv("extractor_seed", c.eval.extractor_seed);
  w.kv("kid_subset_size", c.eval.kid_subset_size);
  w.kv("kid_subsets", c.eval.kid_subsets);
  w.kv("mi_bins", c.eval.mi_bins);

  w.section("translate_dataset");
  w.kv("checkpoint", c.translate_dataset.checkpoint);
  w.kv("manifest", c.translate_dataset.manifest);

  w.section("evaluate");
  w.kv("checkpoint", c.evaluate.checkpoint);
  w.kv("manifest", c.evaluate.manifest);
  w.kv("inject_gt", c.evaluate.inject_gt);
  w.kv("translation_metrics", c.evaluate.translation_metrics);
  w.kv("images_real", c.evaluate.images_real);
  w.kv("images_fake", c.evaluate.images_fake);

  w.section("grid");
  w.kv("frames", c.grid.frames);
  w.kv("models", c.grid.models);
  w.kv("max_frames", c.grid.max_frames);

  w.section("ablation");
  w.kv("cells", c.ablation.cells);
  w.kv("alt_domain_b", c.ablation.alt_domain_b);
  w.kv("seeds", c.ablation.seeds);
  w.kv("parallel", c.ablation.parallel);

  w.section("toy");
  w.kv("pairs", c.toy.pairs);
  w.kv("resolution", c.toy.resolution);
  w.kv("eval_frames", c.toy.eval_frames);
  return w.text();
}

std::string config_hash(const ExperimentConfig& config) {
  // The output location does not change results, so it stays out of the hash.
  ExperimentConfig copy = config;
  copy.output_dir.clear();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_toml(copy)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace sim2real
