#pragma once

#include "kronrisk/error.hpp"
#include "kronrisk/tensor.hpp"
#include "kronrisk/covariance.hpp"
#include "kronrisk/factors.hpp"
#include "kronrisk/portfolio.hpp"
#include "kronrisk/panel.hpp"
#include "kronrisk/synthetic.hpp"
#include "kronrisk/io.hpp"
