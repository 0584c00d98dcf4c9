#include "ldexpand/model.hpp"

namespace ldexpand {

namespace {

ProcessModel example1() {
    ProcessModel m;
    m.name = "example1";
    m.nu = JumpMeasure::atoms({{1.0, Coefficient::constant(0.5)}, {-1.0, Coefficient::constant(0.5)}});
    return m;
}

ProcessModel example2() {
    ProcessModel m;
    m.name = "example2";
    // r(x) = l(x) = sin x + 2, with hand-coded derivatives so x-partials are exact
    auto rate = Coefficient::function([](double, double x) { return std::sin(x) + 2.0; },
                                      {[](double, double x) { return std::cos(x); },
                                       [](double, double x) { return -std::sin(x); },
                                       [](double, double x) { return -std::cos(x); },
                                       [](double, double x) { return std::sin(x); }},
                                      false, true, 4);
    m.nu = JumpMeasure::atoms({{1.0, rate}, {-1.0, rate}});
    return m;
}

ProcessModel brownian() {
    ProcessModel m;
    m.name = "brownian";
    m.a = Coefficient::constant(1.0);
    return m;
}

ProcessModel pide_special() {
    ProcessModel m;
    m.name = "pide-special";
    m.a = Coefficient::constant(1.0);
    m.alpha = Coefficient::function([](double, double x) { return 0.2 * std::sin(x); },
                                    {[](double, double x) { return 0.2 * std::cos(x); },
                                     [](double, double x) { return -0.2 * std::sin(x); },
                                     [](double, double x) { return -0.2 * std::cos(x); },
                                     [](double, double x) { return 0.2 * std::sin(x); }},
                                    false, true, 4);
    m.nu = JumpMeasure::density([](double, double, double u) { return u * u; }, 1.0, 32, false, false);
    return m;
}

}  // namespace

ProcessModel model_preset(std::string_view name) {
    if (name == "example1") return example1();
    if (name == "example2") return example2();
    if (name == "brownian") return brownian();
    if (name == "pide-special") return pide_special();
    fail(Errc::ConfigError, "unknown model preset '" + std::string(name) + "'");
}

std::vector<std::string> model_preset_names() { return {"example1", "example2", "brownian", "pide-special"}; }

}  // namespace ldexpand
