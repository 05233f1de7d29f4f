// nfc.hpp - umbrella header.

#pragma once

#include "nfc/analytic.hpp"
#include "nfc/comb_model.hpp"
#include "nfc/config.hpp"
#include "nfc/errors.hpp"
#include "nfc/field_trace.hpp"
#include "nfc/io.hpp"
#include "nfc/metrics.hpp"
#include "nfc/run.hpp"
#include "nfc/scan.hpp"
#include "nfc/solver.hpp"
#include "nfc/version.hpp"
