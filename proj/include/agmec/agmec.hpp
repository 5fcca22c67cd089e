#pragma once

#include "agmec/agent.hpp"
#include "agmec/auction.hpp"
#include "agmec/baselines.hpp"
#include "agmec/compute.hpp"
#include "agmec/config.hpp"
#include "agmec/context.hpp"
#include "agmec/error.hpp"
#include "agmec/harness.hpp"
#include "agmec/link.hpp"
#include "agmec/nn.hpp"
#include "agmec/oracle.hpp"
#include "agmec/rng.hpp"
#include "agmec/world.hpp"
