#pragma once

#include "osr/eval/rejection.hpp"
#include "osr/eval/report.hpp"
#include "osr/eval/scoring.hpp"
