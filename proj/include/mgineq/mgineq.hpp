#pragma once

#include "burkholder.hpp"
#include "core_types.hpp"
#include "doob.hpp"
#include "envelope.hpp"
#include "error.hpp"
#include "io.hpp"
#include "operator.hpp"
#include "oracle.hpp"
#include "tchakaloff.hpp"
