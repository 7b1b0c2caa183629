#pragma once

#include "natspace/cantor.hpp"
#include "natspace/diagonalize.hpp"
#include "natspace/encodings.hpp"
#include "natspace/expr.hpp"
#include "natspace/formal.hpp"
#include "natspace/induction.hpp"
#include "natspace/metric.hpp"
