#pragma once

#include "hcalc/approx.hpp"
#include "hcalc/box.hpp"
#include "hcalc/dual.hpp"
#include "hcalc/error.hpp"
#include "hcalc/expr.hpp"
#include "hcalc/field.hpp"
#include "hcalc/hgroup.hpp"
#include "hcalc/intrinsic.hpp"
#include "hcalc/levelset.hpp"
#include "hcalc/lowdisc.hpp"
#include "hcalc/measure.hpp"
#include "hcalc/parallel.hpp"
#include "hcalc/split.hpp"
