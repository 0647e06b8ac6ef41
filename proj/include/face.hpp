#pragma once

// Umbrella header for the FACE library.

#include "face/errors.hpp"
#include "face/linalg.hpp"
#include "face/pspline.hpp"
#include "face/pgcv.hpp"
#include "face/estimator.hpp"
#include "face/alt.hpp"
#include "face/structured.hpp"
#include "face/incomplete.hpp"
#include "face/matern.hpp"
#include "face/rng.hpp"
#include "face/sim.hpp"
#include "face/campaign.hpp"
#include "face/matrix_io.hpp"
#include "face/report.hpp"
#include "face/bench.hpp"
#include "face/version.hpp"
