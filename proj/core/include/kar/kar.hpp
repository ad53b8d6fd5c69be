#pragma once

#include "kar/csv.hpp"
#include "kar/dataset.hpp"
#include "kar/errors.hpp"
#include "kar/estimators.hpp"
#include "kar/evaluation.hpp"
#include "kar/kernel.hpp"
#include "kar/linalg.hpp"
#include "kar/linear_model.hpp"
#include "kar/projection.hpp"
#include "kar/report_io.hpp"
#include "kar/sem.hpp"
#include "kar/split.hpp"
#include "kar/version.hpp"
