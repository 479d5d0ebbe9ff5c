#include "qdopfo/report.hpp"

#include <cstdio>
#include <ostream>
#include <vector>

namespace qdopfo {

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_trace_csv(std::ostream& out, const Trace& trace,
                     const RegretReport& report) {
  out << "t,agent,loss,regret_partial,bits_cumulative,consensus_err,tracking_err\n";
  std::vector<std::uint64_t> bits_cum(trace.n, 0);
  for (std::uint64_t t = 1; t <= trace.T; ++t) {
    for (int i = 1; i <= trace.n; ++i) {
      const std::size_t cell = trace.at(t, i);
      bits_cum[i - 1] += trace.bits[cell];
      out << t << ',' << i << ',' << format_double(trace.own_loss[cell]) << ','
          << format_double(report.regret[i - 1][t - 1]) << ','
          << bits_cum[i - 1] << ','
          << format_double(trace.consensus_err[t - 1]) << ','
          << format_double(trace.tracking_err[t - 1]) << '\n';
    }
  }
}

}  // namespace qdopfo
