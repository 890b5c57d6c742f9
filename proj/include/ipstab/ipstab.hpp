#pragma once

// Umbrella header: the whole library in dependency order.

#include "ipstab/errors.hpp"
#include "ipstab/model.hpp"
#include "ipstab/polyroots.hpp"
#include "ipstab/linalg.hpp"
#include "ipstab/synthesis.hpp"
#include "ipstab/spectral.hpp"
#include "ipstab/simulate.hpp"
#include "ipstab/tuner.hpp"
#include "ipstab/config.hpp"
#include "ipstab/report.hpp"
