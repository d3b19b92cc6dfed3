#pragma once

#include "chamberlens/assignment.hpp"
#include "chamberlens/cluster.hpp"
#include "chamberlens/community.hpp"
#include "chamberlens/concordance.hpp"
#include "chamberlens/error.hpp"
#include "chamberlens/graph.hpp"
#include "chamberlens/ingest.hpp"
#include "chamberlens/layout.hpp"
#include "chamberlens/pipeline.hpp"
#include "chamberlens/rng.hpp"
#include "chamberlens/style.hpp"
#include "chamberlens/svg.hpp"
#include "chamberlens/synth.hpp"
