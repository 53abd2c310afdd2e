#pragma once

#include "bergman/experiment.hpp"
