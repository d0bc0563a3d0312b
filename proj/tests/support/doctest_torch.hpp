#pragma once

// libtorch's logging header defines CHECK and friends as aborting asserts.
// Pull torch in first, drop those, then let doctest define its own.
#include <torch/torch.h>

#undef CHECK
#undef CHECK_EQ
#undef CHECK_NE
#undef CHECK_LE
#undef CHECK_LT
#undef CHECK_GE
#undef CHECK_GT

#include <doctest.h>
