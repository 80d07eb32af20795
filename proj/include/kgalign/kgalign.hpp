#pragma once

// Umbrella header for the whole library (the CLI lives in app.hpp).

#include "kgalign/checkpoint.hpp"
#include "kgalign/config.hpp"
#include "kgalign/error.hpp"
#include "kgalign/eval.hpp"
#include "kgalign/grad_check.hpp"
#include "kgalign/graph_prep.hpp"
#include "kgalign/hgcn.hpp"
#include "kgalign/ingest.hpp"
#include "kgalign/kg_core.hpp"
#include "kgalign/log.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/parallel.hpp"
#include "kgalign/pipeline.hpp"
#include "kgalign/random.hpp"
#include "kgalign/ranking.hpp"
#include "kgalign/relation_rep.hpp"
#include "kgalign/tape.hpp"
#include "kgalign/training.hpp"
