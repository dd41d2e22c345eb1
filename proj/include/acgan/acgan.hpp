#pragma once

#include "acgan/errors.hpp"
#include "acgan/random.hpp"
#include "acgan/tensor.hpp"
#include "acgan/autodiff.hpp"
#include "acgan/adam.hpp"
#include "acgan/network.hpp"
#include "acgan/prices.hpp"
#include "acgan/windows.hpp"
#include "acgan/gan.hpp"
#include "acgan/checkpoint.hpp"
#include "acgan/train.hpp"
#include "acgan/scenarios.hpp"
#include "acgan/stylized_facts.hpp"
#include "acgan/portfolio.hpp"
#include "acgan/backtest.hpp"
#include "acgan/synthetic.hpp"
