#pragma once

#include "creditarf/numerics/autograd.hpp"
#include "creditarf/numerics/grad_check.hpp"
#include "creditarf/numerics/layers.hpp"
#include "creditarf/numerics/ops.hpp"
#include "creditarf/numerics/optim.hpp"
#include "creditarf/numerics/rng.hpp"
#include "creditarf/numerics/tensor.hpp"
