#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "steercomp/plant.hpp"
#include "steercomp/telemetry.hpp"

using namespace steercomp;
using Catch::Approx;

namespace {

std::string csv_header() {
  std::string h;
  for (const auto& c : telemetry_columns()) {
    if (!h.empty()) h += ',';
    h += c;
  }
  return h;
}

/// Row with every field set to `base` except t.
std::string uniform_row(double t, double base) {
  std::ostringstream row;
  row << t;
  for (std::size_t i = 1; i < telemetry_columns().size(); ++i) row << ',' << base;
  return row.str();
}

}  // namespace

TEST_CASE("ingest keeps an already-uniform log untouched") {
  std::istringstream in(csv_header() + "\n" + uniform_row(0.00, 1.0) + "\n" +
                        uniform_row(0.05, 2.0) + "\n" + uniform_row(0.10, 3.0) + "\n");
  const TelemetryLog log = parse_telemetry_csv(in, 0.05);
  REQUIRE(log.size() == 3);
  CHECK(log.frames[0].t == 0.00);
  CHECK(log.frames[1].t == 0.05);
  CHECK(log.frames[2].t == 0.10);
  CHECK(log.frames[1].steer_cmd == 2.0);  // untouched, no interpolation
}

TEST_CASE("ingest resamples irregular timestamps by linear interpolation") {
  // rows at t = 0.00, 0.07, 0.12 carrying values 1, 2, 3
  std::istringstream in(csv_header() + "\n" + uniform_row(0.00, 1.0) + "\n" +
                        uniform_row(0.07, 2.0) + "\n" + uniform_row(0.12, 3.0) + "\n");
  const TelemetryLog log = parse_telemetry_csv(in, 0.05);
  REQUIRE(log.size() == 3);
  CHECK(log.frames[0].t == Approx(0.00));
  CHECK(log.frames[1].t == Approx(0.05));
  CHECK(log.frames[2].t == Approx(0.10));
  // hand interpolation: 1 + (0.05/0.07)*(2-1), then 2 + (0.03/0.05)*(3-2)
  CHECK(log.frames[0].steer_cmd == Approx(1.0).margin(1e-12));
  CHECK(log.frames[1].steer_cmd == Approx(1.0 + 0.05 / 0.07).margin(1e-12));
  CHECK(log.frames[2].steer_cmd == Approx(2.0 + 0.03 / 0.05).margin(1e-12));
  // no extrapolation: every output t inside the recorded span
  for (const auto& f : log.frames) {
    CHECK(f.t >= 0.0);
    CHECK(f.t <= 0.12 + 1e-12);
  }
}

TEST_CASE("ingest reports a missing mandatory column by name") {
  std::string header;
  for (const auto& c : telemetry_columns()) {
    if (c == "steer_meas") continue;
    if (!header.empty()) header += ',';
    header += c;
  }
  std::istringstream in(header + "\n");
  try {
    parse_telemetry_csv(in, 0.05);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("steer_meas") != std::string::npos);
  }
}

TEST_CASE("ingest rejects non-monotone timestamps with the row index") {
  std::istringstream in(csv_header() + "\n" + uniform_row(0.00, 1.0) + "\n" +
                        uniform_row(0.10, 2.0) + "\n" + uniform_row(0.05, 3.0) + "\n");
  try {
    parse_telemetry_csv(in, 0.05);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
}

TEST_CASE("ingest rejects an unparseable cell with row and column") {
  std::string row = uniform_row(0.05, 2.0);
  row.replace(row.find(",2"), 2, ",oops");
  std::istringstream in(csv_header() + "\n" + uniform_row(0.00, 1.0) + "\n" + row + "\n");
  try {
    parse_telemetry_csv(in, 0.05);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("oops") != std::string::npos);
    CHECK(msg.find("row 2") != std::string::npos);
  }
}

TEST_CASE("degree-suffixed headers convert to radians") {
  std::string header = csv_header();
  header.replace(header.find("steer_cmd"), 9, "steer_cmd_deg");
  std::istringstream in(header + "\n" + "0,90" + uniform_row(0.0, 0.0).substr(1) + "\n" + "0.05,180" +
                        uniform_row(0.0, 0.0).substr(1) + "\n");
  const TelemetryLog log = parse_telemetry_csv(in, 0.05);
  REQUIRE(log.size() == 2);
  CHECK(log.frames[0].steer_cmd == Approx(3.14159265358979323846 / 2.0));
  CHECK(log.frames[1].steer_cmd == Approx(3.14159265358979323846));
}

TEST_CASE("missing turning_radius cells come back as the missing sentinel") {
  std::string r0 = uniform_row(0.00, 1.0);
  std::string r1 = uniform_row(0.05, 2.0);
  r0 = r0.substr(0, r0.rfind(',') + 1);  // blank the trailing turning_radius cell
  std::istringstream in(csv_header() + "\n" + r0 + "\n" + r1 + "\n");
  const TelemetryLog log = parse_telemetry_csv(in, 0.05);
  CHECK(is_missing(log.frames[0].turning_radius));
  CHECK(log.frames[1].turning_radius == 2.0);

  std::ostringstream out;
  write_telemetry_csv(log, out);
  const std::string text = out.str();
  const std::string first_row = text.substr(text.find('\n') + 1);
  CHECK(first_row.substr(0, first_row.find('\n')).back() == ',');  // empty last field
}

TEST_CASE("export writes the canonical header") {
  TelemetryLog log;
  log.frames.resize(2);
  log.frames[0].t = 0.0;
  log.frames[1].t = 0.05;
  std::ostringstream out;
  write_telemetry_csv(log, out);
  const std::string text = out.str();
  CHECK(text.substr(0, text.find('\n')) ==
        "t,steer_cmd,steer_meas,steer_torque,vel_x,vel_y,vel_z,ang_vel_x,ang_vel_y,ang_vel_z,"
        "acc_x,acc_y,acc_z,wheel_speed_fl,wheel_speed_fr,wheel_speed_rl,wheel_speed_rr,"
        "turning_radius");
}

TEST_CASE("exporting an empty log is a contract error") {
  TelemetryLog log;
  std::ostringstream out;
  CHECK_THROWS_AS(write_telemetry_csv(log, out), ContractError);
}

TEST_CASE("ingest-export-ingest round trip is exact to 1e-9") {
  ScenarioConfig cfg;
  cfg.seed = 7;
  TelemetryLog log = simulate_training_log(cfg, "dlc");
  log.frames.resize(100);

  std::ostringstream out;
  write_telemetry_csv(log, out);
  std::istringstream in(out.str());
  const TelemetryLog redo = parse_telemetry_csv(in, log.sample_period);
  REQUIRE(redo.size() == log.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    for (const auto& name : telemetry_columns()) {
      const double a = get_field(log.frames[i], name);
      const double b = get_field(redo.frames[i], name);
      if (is_missing(a) && is_missing(b)) continue;
      worst = std::max(worst, std::abs(a - b));
    }
  }
  CHECK(worst < 1e-9);

  // second round trip is bit-identical
  std::ostringstream out2;
  write_telemetry_csv(redo, out2);
  CHECK(out.str() == out2.str());
}

TEST_CASE("field access by name covers the whole schema") {
  TelemetryFrame frame;
  double v = 1.0;
  for (const auto& name : telemetry_columns()) {
    set_field(frame, name, v);
    CHECK(get_field(frame, name) == v);
    v += 1.0;
  }
  CHECK_THROWS_AS(get_field(frame, "nonexistent"), SchemaError);
}
