#pragma once

#include <iosfwd>
#include <string>

#include "qdopfo/engine.hpp"
#include "qdopfo/metrics.hpp"

namespace qdopfo {

// fixed column order:
// t,agent,loss,regret_partial,bits_cumulative,consensus_err,tracking_err
void write_trace_csv(std::ostream& out, const Trace& trace,
                     const RegretReport& report);

// %.17g: enough digits to reproduce the double exactly
std::string format_double(double value);

}  // namespace qdopfo
