#pragma once

#include "wattbench/analysis/categories.hpp"
#include "wattbench/analysis/lmm.hpp"
#include "wattbench/analysis/model_dataset.hpp"
#include "wattbench/analysis/ols.hpp"
#include "wattbench/analysis/ranking.hpp"
#include "wattbench/analysis/selection.hpp"
#include "wattbench/analysis/table.hpp"
#include "wattbench/catalog.hpp"
#include "wattbench/clock.hpp"
#include "wattbench/config.hpp"
#include "wattbench/dataset.hpp"
#include "wattbench/error.hpp"
#include "wattbench/host_metadata.hpp"
#include "wattbench/loadgen.hpp"
#include "wattbench/metrics.hpp"
#include "wattbench/mock_sut.hpp"
#include "wattbench/orchestrator.hpp"
#include "wattbench/providers.hpp"
#include "wattbench/report.hpp"
#include "wattbench/rng.hpp"
#include "wattbench/size_category.hpp"
#include "wattbench/stats.hpp"
#include "wattbench/sut.hpp"
#include "wattbench/synthetic_device.hpp"
#include "wattbench/telemetry.hpp"
#include "wattbench/thermal_gate.hpp"
#include "wattbench/types.hpp"
