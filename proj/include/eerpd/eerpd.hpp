#pragma once

#include "eerpd/categorize.hpp"
#include "eerpd/config.hpp"
#include "eerpd/corpus.hpp"
#include "eerpd/csv.hpp"
#include "eerpd/errors.hpp"
#include "eerpd/eval.hpp"
#include "eerpd/labels.hpp"
#include "eerpd/library.hpp"
#include "eerpd/predict.hpp"
#include "eerpd/prompts.hpp"
#include "eerpd/providers.hpp"
#include "eerpd/providers_http.hpp"
#include "eerpd/retrieve.hpp"
#include "eerpd/util.hpp"
