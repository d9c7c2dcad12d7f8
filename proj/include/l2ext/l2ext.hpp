#pragma once

#include "l2ext/error.hpp"
#include "l2ext/parallel.hpp"
#include "l2ext/measure.hpp"
#include "l2ext/linalg.hpp"
#include "l2ext/bundle.hpp"
#include "l2ext/excat.hpp"
#include "l2ext/spectral.hpp"
#include "l2ext/divisor.hpp"
#include "l2ext/germ.hpp"
#include "l2ext/torus.hpp"
#include "l2ext/expression.hpp"
#include "l2ext/scenario.hpp"
#include "l2ext/families.hpp"
