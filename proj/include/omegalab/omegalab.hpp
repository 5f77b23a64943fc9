#pragma once

// Convenience header pulling in the whole library.

#include "omegalab/compensated.hpp"
#include "omegalab/error.hpp"
#include "omegalab/jet.hpp"
#include "omegalab/linear_forms.hpp"
#include "omegalab/parallel.hpp"
#include "omegalab/params.hpp"
#include "omegalab/primality.hpp"
#include "omegalab/quadrature.hpp"
#include "omegalab/series.hpp"
#include "omegalab/sieve.hpp"
#include "omegalab/sieve_identities.hpp"
#include "omegalab/tuples.hpp"
#include "omegalab/version.hpp"
#include "omegalab/window.hpp"
