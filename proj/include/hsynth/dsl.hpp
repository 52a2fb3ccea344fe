#pragma once

#include "hsynth/dsl/ast.hpp"
#include "hsynth/dsl/checker.hpp"
#include "hsynth/dsl/eval.hpp"
#include "hsynth/dsl/features.hpp"
#include "hsynth/dsl/mutate.hpp"
#include "hsynth/dsl/parser.hpp"
#include "hsynth/dsl/render.hpp"
