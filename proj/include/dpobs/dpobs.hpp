#pragma once

#include "dpobs/design.hpp"
#include "dpobs/empirical.hpp"
#include "dpobs/errors.hpp"
#include "dpobs/io.hpp"
#include "dpobs/linalg.hpp"
#include "dpobs/matrix.hpp"
#include "dpobs/mechanism.hpp"
#include "dpobs/sensitivity.hpp"
