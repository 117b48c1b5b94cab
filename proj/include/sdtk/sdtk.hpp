#pragma once

// Umbrella header: pulls in the whole library.

#include <sdtk/rational.hpp>
#include <sdtk/linalg.hpp>
#include <sdtk/model.hpp>
#include <sdtk/signals.hpp>
#include <sdtk/simulate.hpp>
#include <sdtk/jsr.hpp>
#include <sdtk/controllability.hpp>
#include <sdtk/synthesis.hpp>
#include <sdtk/io.hpp>
#include <sdtk/reproduce.hpp>
