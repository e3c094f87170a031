#pragma once

#include "agents.hpp"
#include "builtin_grammars.hpp"
#include "builtin_templates.hpp"
#include "common.hpp"
#include "dsl.hpp"
#include "envs.hpp"
#include "falsification.hpp"
#include "llm.hpp"
#include "llm_http.hpp"
#include "metrics.hpp"
#include "orchestrator.hpp"
#include "record.hpp"
#include "report.hpp"
#include "stats.hpp"
#include "store.hpp"
