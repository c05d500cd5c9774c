#pragma once

#include "bvm/agreement.hpp"
#include "bvm/analysis.hpp"
#include "bvm/config.hpp"
#include "bvm/data.hpp"
#include "bvm/errors.hpp"
#include "bvm/io.hpp"
#include "bvm/likelihood.hpp"
#include "bvm/models.hpp"
#include "bvm/normal.hpp"
#include "bvm/pipeline.hpp"
#include "bvm/reference_data.hpp"
#include "bvm/reproduce.hpp"
#include "bvm/sampler.hpp"
#include "bvm/scenarios.hpp"
