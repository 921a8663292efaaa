#pragma once

#include "symetric/baseline.hpp"
#include "symetric/benchgen.hpp"
#include "symetric/config.hpp"
#include "symetric/eval.hpp"
#include "symetric/expr.hpp"
#include "symetric/extract.hpp"
#include "symetric/harness.hpp"
#include "symetric/metric.hpp"
#include "symetric/mtree.hpp"
#include "symetric/repair.hpp"
#include "symetric/scene.hpp"
#include "symetric/synth.hpp"
#include "symetric/xfta.hpp"
