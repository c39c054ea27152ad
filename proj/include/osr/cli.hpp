#pragma once

#include "osr/cli/commands.hpp"
#include "osr/cli/config.hpp"
