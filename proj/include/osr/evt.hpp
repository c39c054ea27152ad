#pragma once

#include "osr/evt/model_file.hpp"
#include "osr/evt/openset.hpp"
#include "osr/evt/weibull.hpp"
