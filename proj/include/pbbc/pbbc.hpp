#pragma once

#include "pbbc/bitbox.hpp"
#include "pbbc/compressor.hpp"
#include "pbbc/decompress.hpp"
#include "pbbc/io.hpp"
#include "pbbc/kdtree.hpp"
#include "pbbc/layout.hpp"
#include "pbbc/metrics.hpp"
#include "pbbc/model.hpp"
#include "pbbc/reducer.hpp"
