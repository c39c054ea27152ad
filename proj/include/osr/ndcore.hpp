#pragma once

#include "osr/ndcore/binary_io.hpp"
#include "osr/ndcore/error.hpp"
#include "osr/ndcore/grad_check.hpp"
#include "osr/ndcore/ops.hpp"
#include "osr/ndcore/rng.hpp"
#include "osr/ndcore/tensor.hpp"
