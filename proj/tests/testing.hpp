#pragma once

// Torch's logging header defines CHECK and friends; load it first and hand
// the names to doctest.
#include <torch/torch.h>

#undef CHECK
#undef CHECK_EQ
#undef CHECK_NE
#undef CHECK_LT
#undef CHECK_LE
#undef CHECK_GT
#undef CHECK_GE

#include <doctest.h>
