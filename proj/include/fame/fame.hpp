#pragma once

#include "fame/btrank.hpp"
#include "fame/coincidence.hpp"
#include "fame/correlate.hpp"
#include "fame/csv.hpp"
#include "fame/data.hpp"
#include "fame/date.hpp"
#include "fame/error.hpp"
#include "fame/grfreq.hpp"
#include "fame/simulate.hpp"
#include "fame/svg.hpp"
#include "fame/table1.hpp"
#include "fame/tailfit.hpp"
#include "fame/wiki.hpp"
