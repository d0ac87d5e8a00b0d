#pragma once

#include "gainform/errors.hpp"
#include "gainform/experiment.hpp"
#include "gainform/hinf_norm.hpp"
#include "gainform/io.hpp"
#include "gainform/model.hpp"
#include "gainform/positivity.hpp"
#include "gainform/riccati.hpp"
#include "gainform/simulate.hpp"
#include "gainform/synthesis.hpp"
