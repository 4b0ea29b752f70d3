#pragma once

#include "finslab/error.hpp"
#include "finslab/jets.hpp"
#include "finslab/series.hpp"
#include "finslab/ring.hpp"
#include "finslab/tensor.hpp"
#include "finslab/expr.hpp"
#include "finslab/metrics.hpp"
#include "finslab/volume.hpp"
#include "finslab/curvature.hpp"
#include "finslab/projective.hpp"
#include "finslab/catalog.hpp"
#include "finslab/classify.hpp"
#include "finslab/io.hpp"
