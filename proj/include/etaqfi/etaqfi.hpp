#pragma once

#include "etaqfi/error.hpp"
#include "etaqfi/densela.hpp"
#include "etaqfi/pseudoherm.hpp"
#include "etaqfi/geometry.hpp"
#include "etaqfi/qfi.hpp"
#include "etaqfi/models.hpp"
#include "etaqfi/sweep.hpp"
#include "etaqfi/verify.hpp"
