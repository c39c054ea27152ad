#pragma once

#include "osr/dataio/dataset.hpp"
#include "osr/dataio/embeddings.hpp"
#include "osr/dataio/idx.hpp"
#include "osr/dataio/split.hpp"
#include "osr/dataio/synthetic.hpp"
