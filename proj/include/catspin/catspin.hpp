#pragma once

#include "catspin/errors.hpp"
#include "catspin/dicke.hpp"
#include "catspin/protocol.hpp"
#include "catspin/protocol_json.hpp"
#include "catspin/observables.hpp"
#include "catspin/husimi.hpp"
#include "catspin/cavity.hpp"
#include "catspin/parallel.hpp"
#include "catspin/io.hpp"

#define CATSPIN_VERSION "0.1.0"
