#pragma once

#include <lemmaguide/config.hpp>
#include <lemmaguide/errors.hpp>
#include <lemmaguide/guidance.hpp>
#include <lemmaguide/harness.hpp>
#include <lemmaguide/hash.hpp>
#include <lemmaguide/http_transport.hpp>
#include <lemmaguide/lean_lexer.hpp>
#include <lemmaguide/lean_syntax.hpp>
#include <lemmaguide/model_clients.hpp>
#include <lemmaguide/orchestrator.hpp>
#include <lemmaguide/process.hpp>
#include <lemmaguide/prompts.hpp>
#include <lemmaguide/run_log.hpp>
#include <lemmaguide/task_model.hpp>
#include <lemmaguide/verifier.hpp>
