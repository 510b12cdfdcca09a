#pragma once

#include <string>

#include "casemix/store.hpp"

namespace casemix::testing {

inline std::string data_file(const std::string& name) { return std::string(CASEMIX_DATA_DIR) + "/" + name; }

// Demonstration hospital, wards held through surgery.
inline Scenario demo() { return load_scenario(data_file("demo_hospital.json")).scenario; }
// Same hospital with the settings the alteration rows were produced under.
inline StoredScenario alteration_demo() { return load_scenario(data_file("demo_hospital_alteration.json")); }
inline StoredScenario covid() { return load_scenario(data_file("covid_8week.json")); }

inline const CaseMix& demo_baseline() {
  static const CaseMix m{{5.68, 48.82, 20.43, 10.22, 28.38}};
  return m;
}

}  // namespace casemix::testing
