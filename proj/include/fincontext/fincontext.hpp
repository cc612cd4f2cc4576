#pragma once

#include "fincontext/agent.hpp"
#include "fincontext/context_builder.hpp"
#include "fincontext/data_module.hpp"
#include "fincontext/date.hpp"
#include "fincontext/errors.hpp"
#include "fincontext/eval.hpp"
#include "fincontext/external_agent.hpp"
#include "fincontext/json_io.hpp"
#include "fincontext/query_synthesis.hpp"
#include "fincontext/registry.hpp"
#include "fincontext/request_grammar.hpp"
#include "fincontext/service.hpp"
#include "fincontext/text.hpp"
