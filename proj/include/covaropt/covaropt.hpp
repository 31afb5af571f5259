#pragma once

#include "covaropt/core.hpp"
#include "covaropt/normal.hpp"
#include "covaropt/linalg.hpp"
#include "covaropt/optim.hpp"
#include "covaropt/market_model.hpp"
#include "covaropt/instruments.hpp"
#include "covaropt/risk.hpp"
#include "covaropt/hedging.hpp"
#include "covaropt/socp.hpp"
#include "covaropt/p1.hpp"
#include "covaropt/controllability.hpp"
#include "covaropt/econometrics.hpp"
#include "covaropt/instance.hpp"
#include "covaropt/backtest.hpp"
