#pragma once

#include "smoothrob/attacks.hpp"
#include "smoothrob/batch.hpp"
#include "smoothrob/checkpoint.hpp"
#include "smoothrob/dataset.hpp"
#include "smoothrob/error.hpp"
#include "smoothrob/eval.hpp"
#include "smoothrob/losses.hpp"
#include "smoothrob/model.hpp"
#include "smoothrob/parallel.hpp"
#include "smoothrob/rng.hpp"
#include "smoothrob/tensor.hpp"
#include "smoothrob/training.hpp"
#include "smoothrob/report.hpp"
