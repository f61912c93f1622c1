#pragma once

#include "leibniz/config.hpp"
#include "leibniz/distribution.hpp"
#include "leibniz/errors.hpp"
#include "leibniz/eventual_seq.hpp"
#include "leibniz/expr.hpp"
#include "leibniz/integrate.hpp"
#include "leibniz/interval.hpp"
#include "leibniz/measure.hpp"
#include "leibniz/partition.hpp"
#include "leibniz/rational.hpp"
#include "leibniz/real_fn.hpp"
#include "leibniz/suites.hpp"
