#pragma once

#include "nlbp/core.hpp"
#include "nlbp/integral.hpp"
#include "nlbp/image_io.hpp"
#include "nlbp/resample.hpp"
#include "nlbp/features.hpp"
#include "nlbp/classifiers.hpp"
#include "nlbp/model_io.hpp"
#include "nlbp/dataset.hpp"
#include "nlbp/detector.hpp"
#include "nlbp/evaluation.hpp"
#include "nlbp/parallel.hpp"
#include "nlbp/rng.hpp"
