// Copyright (C) 2026 The RoCoFT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "rocoft/errors.hpp"
#include "rocoft/tensor.hpp"
#include "rocoft/autodiff.hpp"
#include "rocoft/model.hpp"
#include "rocoft/peft.hpp"
#include "rocoft/train.hpp"
#include "rocoft/data.hpp"
#include "rocoft/metrics.hpp"
#include "rocoft/selection.hpp"
#include "rocoft/ntk.hpp"
#include "rocoft/klr.hpp"
#include "rocoft/config.hpp"
#include "rocoft/harness.hpp"
