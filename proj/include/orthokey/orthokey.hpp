#pragma once

// umbrella include for the whole library

#include "field.hpp"
#include "hashing.hpp"
#include "infolab.hpp"
#include "projspace.hpp"
#include "protocol.hpp"
#include "rng.hpp"
#include "specgraph.hpp"
