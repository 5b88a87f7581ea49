#pragma once

#include "xspace/error.hpp"
#include "xspace/text.hpp"
#include "xspace/corpus.hpp"
#include "xspace/kg.hpp"
#include "xspace/fca.hpp"
#include "xspace/taxonomy.hpp"
#include "xspace/pertinence.hpp"
#include "xspace/remote_embed.hpp"
#include "xspace/overview.hpp"
#include "xspace/graph.hpp"
#include "xspace/espace.hpp"
#include "xspace/bundle.hpp"
#include "xspace/stats.hpp"
#include "xspace/eval.hpp"
#include "xspace/service.hpp"
