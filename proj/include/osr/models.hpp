#pragma once

#include "osr/models/adam.hpp"
#include "osr/models/checkpoint.hpp"
#include "osr/models/elbo.hpp"
#include "osr/models/forward.hpp"
#include "osr/models/inference.hpp"
#include "osr/models/model.hpp"
#include "osr/models/train.hpp"
