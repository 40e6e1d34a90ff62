#pragma once

#include "longicog/cohort.hpp"
#include "longicog/dataset.hpp"
#include "longicog/evaluation.hpp"
#include "longicog/features.hpp"
#include "longicog/learners.hpp"
#include "longicog/longitudinal.hpp"
#include "longicog/parallel.hpp"
#include "longicog/synth.hpp"
