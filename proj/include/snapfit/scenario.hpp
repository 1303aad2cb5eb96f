#pragma once
// Scenario configuration: a flat INI file with [section] headers. File values
// use bench units (mm, degrees, N, seconds, GPa); the loaded struct is SI.
// Unknown keys are rejected by full key path, so typos cannot silently fall
// back to defaults.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <snapfit/beam.hpp>
#include <snapfit/geometry.hpp>
#include <snapfit/lumped.hpp>

namespace snapfit {

enum class JoiningModel { analytic, slide, one_hinge, two_hinge };
enum class Algorithm { sac, td3 };

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    double mid() const { return 0.5 * (lo + hi); }
    double half() const { return 0.5 * (hi - lo); }
};

class ScenarioError : public std::runtime_error {
public:
    ScenarioError(std::string key_path, const std::string& what)
        : std::runtime_error("scenario: " + key_path + ": " + what),
          key_path_(std::move(key_path)) {}
    const std::string& key_path() const { return key_path_; }

private:
    std::string key_path_;
};

struct Scenario {
    int schema_version = 1;

    SnapHookProfile hook;
    int beam_count = 1; // parallel bending beams of a wide terminal
    RailProfile rail;

    struct Beam {
        double secant_modulus = 1.2e9;
        double friction = 0.2;
        bool corrected = true;
        LengthMode length_mode = LengthMode::constant;
    } beam;

    struct Lumped {
        LumpedVariant variant = LumpedVariant::two_hinge;
        double dt = 1e-4;
        double density = 1010.0;
        double epsilon = 1e-7;
    } lumped;

    struct Control {
        JoiningModel joining_model = JoiningModel::analytic;
        double dt = 0.01;
        double force_limit = 50.0;
        double contact_stiffness = 1e5;
        double yaw_gain = 5.0;
        // the lip gives a usable alignment moment only over a narrow angle
        double yaw_cue_saturation = deg2rad(5.0);
        double contact_threshold = 2.0;
        double force_band = 0.5; // settled when |F - target| is inside
        double goal_tol_pos = 0.1e-3;
        double goal_tol_ang = deg2rad(0.1);
        double overlap_jump = 0.5e-3;
        double pre_x = 8e-3;
        double pre_z = 20e-3;
        // tilt keeping the deep snap head clear of the rail top while the
        // fixed hook reaches below the lip line beside the rail
        double pre_pitch = deg2rad(-15.0);
    } control;

    struct Randomization {
        double offset_range = 5e-3;
        double yaw_range = deg2rad(3.0);
        double force_noise = 0.2;
    } randomization;

    struct Success {
        double yaw_tol = deg2rad(1.0);
        double pos_tol = 0.5e-3;
    } success;

    struct Skills {
        Range lin_dpx{-25e-3, 25e-3};
        Range lin_phib{deg2rad(-5.0), deg2rad(5.0)};
        Range approach_vz{2e-3, 20e-3};
        Range approach_fz{3.0, 15.0};
        Range slide_vxz{1e-3, 10e-3};
        Range slide_fslide{1.0, 30.0};
        Range slide_ftarget{1.0, 15.0};
        Range slide_cpd{1e-4, 1e-3};
        Range pivot_phib{deg2rad(-30.0), deg2rad(30.0)};
        Range pivot_omega{0.02, 0.5};
        Range pivot_phic{deg2rad(-20.0), deg2rad(20.0)};
        Range pivot_fx{3.0, 30.0};
        Range pivot_fz{3.0, 30.0};
        double timeout = 10.0;
    } skills;

    struct Train {
        Algorithm algorithm = Algorithm::sac;
        long long steps = 100000;
        int eval_period = 1000;
        int eval_rollouts = 100;
        int seeds = 5;
        double gamma = 0.99;
        double lr = 3e-4;
        int buffer_capacity = 100000;
        int batch_size = 256;
        double tau = 0.005;
        int warmup = 1000;
        int skill_budget = 6;
    } train;

    std::uint64_t source_hash = 0; // FNV-1a of the loaded file bytes
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// shortest decimal text that parses back to exactly v
inline std::string format_number(double v) {
    char buf[48];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline double parse_number(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw ScenarioError(key, "expected a number, got '" + text + "'");
    return v;
}

inline long long parse_integer(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    long long v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw ScenarioError(key, "expected an integer, got '" + text + "'");
    return v;
}

inline bool parse_boolean(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1") return true;
    if (t == "false" || t == "0") return false;
    throw ScenarioError(key, "expected true/false, got '" + text + "'");
}

struct ScenarioField {
    std::string key; // "section.key"
    std::function<void(Scenario&, const std::string&)> set;
    std::function<std::string(const Scenario&)> get;
};

// Field table: one entry per file key, in output order. Accessors are generic
// lambdas so the same accessor serves both the const getter and the setter.
inline std::vector<ScenarioField> scenario_fields() {
    std::vector<ScenarioField> fields;

    auto num = [&fields](const char* key, double scale, auto access) {
        fields.push_back(
            {key,
             [access, scale, k = std::string(key)](Scenario& s, const std::string& v) {
                 access(s) = parse_number(k, v) * scale;
             },
             [access, scale](const Scenario& s) {
                 return format_number(access(s) / scale);
             }});
    };
    auto integer = [&fields](const char* key, auto access) {
        fields.push_back(
            {key,
             [access, k = std::string(key)](Scenario& s, const std::string& v) {
                 access(s) = static_cast<std::remove_reference_t<decltype(access(s))>>(
                     parse_integer(k, v));
             },
             [access](const Scenario& s) { return std::to_string(access(s)); }});
    };
    auto boolean = [&fields](const char* key, auto access) {
        fields.push_back(
            {key,
             [access, k = std::string(key)](Scenario& s, const std::string& v) {
                 access(s) = parse_boolean(k, v);
             },
             [access](const Scenario& s) -> std::string {
                 return access(s) ? "true" : "false";
             }});
    };
    auto enumeration = [&fields](const char* key, auto access,
                                 std::vector<std::pair<std::string,
                                                       std::decay_t<decltype(access(
                                                           std::declval<Scenario&>()))>>>
                                     names) {
        fields.push_back(
            {key,
             [access, names, k = std::string(key)](Scenario& s, const std::string& v) {
                 const std::string t = trim(v);
                 for (const auto& [name, value] : names)
                     if (name == t) {
                         access(s) = value;
                         return;
                     }
                 throw ScenarioError(k, "unknown value '" + v + "'");
             },
             [access, names](const Scenario& s) -> std::string {
                 for (const auto& [name, value] : names)
                     if (access(s) == value) return name;
                 return "?";
             }});
    };
    auto range = [&num](const std::string& key, double scale, auto access) {
        const std::string lo = key + "_min", hi = key + "_max";
        num(lo.c_str(), scale, [access](auto& s) -> auto& { return access(s).lo; });
        num(hi.c_str(), scale, [access](auto& s) -> auto& { return access(s).hi; });
    };

    constexpr double mm = 1e-3, deg = kPi / 180.0, GPa = 1e9, us = 1e-6, ms = 1e-3;

    integer("meta.schema_version", [](auto& s) -> auto& { return s.schema_version; });

    num("hook.l", mm, [](auto& s) -> auto& { return s.hook.beam_length; });
    num("hook.b", mm, [](auto& s) -> auto& { return s.hook.beam_width; });
    num("hook.h", mm, [](auto& s) -> auto& { return s.hook.beam_thickness; });
    num("hook.h_k", mm, [](auto& s) -> auto& { return s.hook.head_height; });
    num("hook.alpha_deg", deg, [](auto& s) -> auto& { return s.hook.joining_angle; });
    num("hook.s", mm, [](auto& s) -> auto& { return s.hook.overlap_value; });
    enumeration("hook.contour", [](auto& s) -> auto& { return s.hook.contour; },
                {{"I", ContourClass::I}, {"II", ContourClass::II}, {"III", ContourClass::III}});
    num("hook.plateau", mm, [](auto& s) -> auto& { return s.hook.plateau_length; });
    num("hook.ramp", mm, [](auto& s) -> auto& { return s.hook.ramp_length; });
    enumeration("hook.recess", [](auto& s) -> auto& { return s.hook.recess_side; },
                {{"none", RecessSide::none}, {"left", RecessSide::left}, {"right", RecessSide::right}});
    num("hook.recess_delta_deg", deg,
        [](auto& s) -> auto& { return s.hook.recess_angle_delta; });
    integer("hook.beam_count", [](auto& s) -> auto& { return s.beam_count; });

    num("rail.width", mm, [](auto& s) -> auto& { return s.rail.width; });
    num("rail.edge_height", mm, [](auto& s) -> auto& { return s.rail.edge_height; });
    num("rail.lip_depth", mm, [](auto& s) -> auto& { return s.rail.lip_depth; });
    num("rail.fixed_hook_clearance", mm,
        [](auto& s) -> auto& { return s.rail.fixed_hook_clearance; });

    num("beam.E_S_GPa", GPa, [](auto& s) -> auto& { return s.beam.secant_modulus; });
    num("beam.mu0", 1.0, [](auto& s) -> auto& { return s.beam.friction; });
    boolean("beam.corrected", [](auto& s) -> auto& { return s.beam.corrected; });
    enumeration("beam.l_eff_mode",
                [](auto& s) -> auto& { return s.beam.length_mode; },
                {{"constant", LengthMode::constant},
                 {"contact_point", LengthMode::contact_point}});

    enumeration("lumped.variant",
                [](auto& s) -> auto& { return s.lumped.variant; },
                {{"slide", LumpedVariant::slide},
                 {"one_hinge", LumpedVariant::one_hinge},
                 {"two_hinge", LumpedVariant::two_hinge}});
    num("lumped.dt_us", us, [](auto& s) -> auto& { return s.lumped.dt; });
    num("lumped.density", 1.0, [](auto& s) -> auto& { return s.lumped.density; });
    num("lumped.epsilon", 1.0, [](auto& s) -> auto& { return s.lumped.epsilon; });

    enumeration("control.joining_model",
                [](auto& s) -> auto& { return s.control.joining_model; },
                {{"analytic", JoiningModel::analytic},
                 {"slide", JoiningModel::slide},
                 {"one_hinge", JoiningModel::one_hinge},
                 {"two_hinge", JoiningModel::two_hinge}});
    num("control.dt_ms", ms, [](auto& s) -> auto& { return s.control.dt; });
    num("control.force_limit_N", 1.0, [](auto& s) -> auto& { return s.control.force_limit; });
    num("control.contact_stiffness", 1.0,
        [](auto& s) -> auto& { return s.control.contact_stiffness; });
    num("control.yaw_gain", 1.0, [](auto& s) -> auto& { return s.control.yaw_gain; });
    num("control.yaw_cue_sat_deg", deg,
        [](auto& s) -> auto& { return s.control.yaw_cue_saturation; });
    num("control.contact_threshold_N", 1.0,
        [](auto& s) -> auto& { return s.control.contact_threshold; });
    num("control.force_band_N", 1.0, [](auto& s) -> auto& { return s.control.force_band; });
    num("control.goal_tol_mm", mm, [](auto& s) -> auto& { return s.control.goal_tol_pos; });
    num("control.goal_tol_deg", deg, [](auto& s) -> auto& { return s.control.goal_tol_ang; });
    num("control.overlap_jump_mm", mm, [](auto& s) -> auto& { return s.control.overlap_jump; });
    num("control.pre_x_mm", mm, [](auto& s) -> auto& { return s.control.pre_x; });
    num("control.pre_z_mm", mm, [](auto& s) -> auto& { return s.control.pre_z; });
    num("control.pre_pitch_deg", deg, [](auto& s) -> auto& { return s.control.pre_pitch; });

    num("randomization.dx_mm", mm,
        [](auto& s) -> auto& { return s.randomization.offset_range; });
    num("randomization.gamma_deg", deg,
        [](auto& s) -> auto& { return s.randomization.yaw_range; });
    num("randomization.sigma_F_N", 1.0,
        [](auto& s) -> auto& { return s.randomization.force_noise; });

    num("success.yaw_tol_deg", deg, [](auto& s) -> auto& { return s.success.yaw_tol; });
    num("success.pos_tol_mm", mm, [](auto& s) -> auto& { return s.success.pos_tol; });

    range("skills.lin_dpx_mm", mm, [](auto& s) -> auto& { return s.skills.lin_dpx; });
    range("skills.lin_phib_deg", deg, [](auto& s) -> auto& { return s.skills.lin_phib; });
    range("skills.approach_vz_mms", mm, [](auto& s) -> auto& { return s.skills.approach_vz; });
    range("skills.approach_fz_N", 1.0, [](auto& s) -> auto& { return s.skills.approach_fz; });
    range("skills.slide_vxz_mms", mm, [](auto& s) -> auto& { return s.skills.slide_vxz; });
    range("skills.slide_fslide_N", 1.0, [](auto& s) -> auto& { return s.skills.slide_fslide; });
    range("skills.slide_ftarget_N", 1.0, [](auto& s) -> auto& { return s.skills.slide_ftarget; });
    range("skills.slide_cpd", 1.0, [](auto& s) -> auto& { return s.skills.slide_cpd; });
    range("skills.pivot_phib_deg", deg, [](auto& s) -> auto& { return s.skills.pivot_phib; });
    range("skills.pivot_omega", 1.0, [](auto& s) -> auto& { return s.skills.pivot_omega; });
    range("skills.pivot_phic_deg", deg, [](auto& s) -> auto& { return s.skills.pivot_phic; });
    range("skills.pivot_fx_N", 1.0, [](auto& s) -> auto& { return s.skills.pivot_fx; });
    range("skills.pivot_fz_N", 1.0, [](auto& s) -> auto& { return s.skills.pivot_fz; });
    num("skills.timeout_s", 1.0, [](auto& s) -> auto& { return s.skills.timeout; });

    enumeration("train.algo", [](auto& s) -> auto& { return s.train.algorithm; },
                {{"sac", Algorithm::sac}, {"td3", Algorithm::td3}});
    integer("train.steps", [](auto& s) -> auto& { return s.train.steps; });
    integer("train.eval_period", [](auto& s) -> auto& { return s.train.eval_period; });
    integer("train.eval_rollouts", [](auto& s) -> auto& { return s.train.eval_rollouts; });
    integer("train.seeds", [](auto& s) -> auto& { return s.train.seeds; });
    num("train.gamma", 1.0, [](auto& s) -> auto& { return s.train.gamma; });
    num("train.lr", 1.0, [](auto& s) -> auto& { return s.train.lr; });
    integer("train.buffer", [](auto& s) -> auto& { return s.train.buffer_capacity; });
    integer("train.batch", [](auto& s) -> auto& { return s.train.batch_size; });
    num("train.tau", 1.0, [](auto& s) -> auto& { return s.train.tau; });
    integer("train.warmup", [](auto& s) -> auto& { return s.train.warmup; });
    integer("train.skill_budget", [](auto& s) -> auto& { return s.train.skill_budget; });

    return fields;
}

struct IniEntry {
    std::string section, key, value;
    int line = 0;
};

inline std::vector<IniEntry> parse_ini(const std::string& text) {
    std::vector<IniEntry> entries;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ScenarioError("line " + std::to_string(line_no),
                                    "malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ScenarioError("line " + std::to_string(line_no),
                                "expected key = value, got '" + line + "'");
        IniEntry e;
        e.section = section;
        e.key = trim(line.substr(0, eq));
        e.value = trim(line.substr(eq + 1));
        e.line = line_no;
        if (e.key.empty())
            throw ScenarioError("line " + std::to_string(line_no), "empty key");
        entries.push_back(std::move(e));
    }
    return entries;
}

} // namespace detail

inline void validate_scenario(const Scenario& s) {
    auto bad = [](const char* key, const char* why) { throw ScenarioError(key, why); };
    auto require = [&bad](bool ok, const char* key, const char* why) {
        if (!ok) bad(key, why);
    };

    require(s.schema_version == 1, "meta.schema_version", "unsupported schema version");

    require(s.hook.beam_length > 0, "hook.l", "must be positive");
    require(s.hook.beam_width > 0, "hook.b", "must be positive");
    require(s.hook.beam_thickness > 0, "hook.h", "must be positive");
    require(s.hook.head_height > 0, "hook.h_k", "must be positive");
    require(s.hook.joining_angle > 0 && s.hook.joining_angle < kPi / 2,
            "hook.alpha_deg", "must lie in (0, 90)");
    require(s.hook.overlap_value <= s.hook.head_height, "hook.s",
            "must not exceed hook.h_k");
    if (s.hook.contour != ContourClass::I)
        require(s.hook.plateau_length > 0, "hook.plateau", "must be positive");
    if (s.hook.contour == ContourClass::III)
        require(s.hook.ramp_length > 0, "hook.ramp", "must be positive");
    require(s.hook.recess_angle_delta >= 0 &&
                s.hook.recess_angle_delta < s.hook.joining_angle,
            "hook.recess_delta_deg", "must lie in [0, alpha)");
    require(s.beam_count >= 1, "hook.beam_count", "must be at least 1");

    require(s.rail.width > 0, "rail.width", "must be positive");
    require(s.rail.edge_height > 0, "rail.edge_height", "must be positive");
    require(s.rail.lip_depth > 0 && s.rail.lip_depth < s.rail.edge_height,
            "rail.lip_depth", "must lie in (0, edge_height)");
    require(s.rail.fixed_hook_clearance >= 0, "rail.fixed_hook_clearance",
            "must be non-negative");

    require(s.beam.secant_modulus > 0, "beam.E_S_GPa", "must be positive");
    require(s.beam.friction >= 0 && s.beam.friction < 1, "beam.mu0",
            "must lie in [0, 1)");

    require(s.lumped.dt > 0 && s.lumped.dt <= 1e-3, "lumped.dt_us",
            "must lie in (0, 1000]");
    require(s.lumped.density > 0, "lumped.density", "must be positive");
    require(s.lumped.epsilon > 0, "lumped.epsilon", "must be positive");

    require(s.control.dt > 0 && s.control.dt <= 0.05, "control.dt_ms",
            "must lie in (0, 50]");
    require(s.control.force_limit > 0, "control.force_limit_N", "must be positive");
    require(s.control.contact_stiffness > 0, "control.contact_stiffness",
            "must be positive");
    require(s.control.yaw_gain >= 0, "control.yaw_gain", "must be non-negative");
    require(s.control.yaw_cue_saturation > 0, "control.yaw_cue_sat_deg",
            "must be positive");
    require(s.control.contact_threshold > 0, "control.contact_threshold_N",
            "must be positive");
    require(s.control.force_band > 0, "control.force_band_N", "must be positive");
    require(s.control.goal_tol_pos > 0, "control.goal_tol_mm", "must be positive");
    require(s.control.goal_tol_ang > 0, "control.goal_tol_deg", "must be positive");
    require(s.control.overlap_jump > 0, "control.overlap_jump_mm", "must be positive");

    require(s.randomization.offset_range >= 0, "randomization.dx_mm",
            "must be non-negative");
    require(s.randomization.yaw_range >= 0, "randomization.gamma_deg",
            "must be non-negative");
    require(s.randomization.force_noise >= 0, "randomization.sigma_F_N",
            "must be non-negative");

    require(s.success.yaw_tol > 0, "success.yaw_tol_deg", "must be positive");
    require(s.success.pos_tol > 0, "success.pos_tol_mm", "must be positive");

    const std::pair<const char*, const Range*> ranges[] = {
        {"skills.lin_dpx_mm", &s.skills.lin_dpx},
        {"skills.lin_phib_deg", &s.skills.lin_phib},
        {"skills.approach_vz_mms", &s.skills.approach_vz},
        {"skills.approach_fz_N", &s.skills.approach_fz},
        {"skills.slide_vxz_mms", &s.skills.slide_vxz},
        {"skills.slide_fslide_N", &s.skills.slide_fslide},
        {"skills.slide_ftarget_N", &s.skills.slide_ftarget},
        {"skills.slide_cpd", &s.skills.slide_cpd},
        {"skills.pivot_phib_deg", &s.skills.pivot_phib},
        {"skills.pivot_omega", &s.skills.pivot_omega},
        {"skills.pivot_phic_deg", &s.skills.pivot_phic},
        {"skills.pivot_fx_N", &s.skills.pivot_fx},
        {"skills.pivot_fz_N", &s.skills.pivot_fz},
    };
    for (const auto& [key, r] : ranges)
        if (!(r->lo < r->hi))
            throw ScenarioError(std::string(key) + "_min", "range must be non-empty");
    require(s.skills.timeout > 0, "skills.timeout_s", "must be positive");

    require(s.train.steps >= 0, "train.steps", "must be non-negative");
    require(s.train.eval_period >= 1, "train.eval_period", "must be at least 1");
    require(s.train.eval_rollouts >= 1, "train.eval_rollouts", "must be at least 1");
    require(s.train.seeds >= 1, "train.seeds", "must be at least 1");
    require(s.train.gamma > 0 && s.train.gamma <= 1, "train.gamma",
            "must lie in (0, 1]");
    require(s.train.lr >= 0, "train.lr", "must be non-negative");
    require(s.train.buffer_capacity >= 1, "train.buffer", "must be at least 1");
    require(s.train.batch_size >= 1 && s.train.batch_size <= s.train.buffer_capacity,
            "train.batch", "must lie in [1, train.buffer]");
    require(s.train.tau > 0 && s.train.tau <= 1, "train.tau", "must lie in (0, 1]");
    require(s.train.warmup >= 0, "train.warmup", "must be non-negative");
    require(s.train.skill_budget >= 1, "train.skill_budget", "must be at least 1");

    // profile cross-checks (redundant with the above but keeps geometry's own
    // invariants authoritative)
    try {
        s.hook.validate();
        s.rail.validate();
    } catch (const std::invalid_argument& e) {
        throw ScenarioError("hook/rail", e.what());
    }
}

inline Scenario scenario_from_text(const std::string& text) {
    Scenario s;
    static const std::vector<detail::ScenarioField> fields = detail::scenario_fields();
    std::map<std::string, const detail::ScenarioField*> by_key;
    for (const auto& f : fields) by_key[f.key] = &f;

    for (const auto& e : detail::parse_ini(text)) {
        const std::string path =
            e.section.empty() ? e.key : e.section + "." + e.key;
        const auto it = by_key.find(path);
        if (it == by_key.end()) throw ScenarioError(path, "unknown key");
        it->second->set(s, e.value);
    }
    validate_scenario(s);
    s.source_hash = fnv1a64(text);
    return s;
}

inline std::string scenario_to_text(const Scenario& s) {
    static const std::vector<detail::ScenarioField> fields = detail::scenario_fields();
    std::string out, section;
    for (const auto& f : fields) {
        const std::size_t dot = f.key.find('.');
        const std::string sec = f.key.substr(0, dot);
        if (sec != section) {
            if (!out.empty()) out += '\n';
            out += '[' + sec + "]\n";
            section = sec;
        }
        out += f.key.substr(dot + 1) + " = " + f.get(s) + '\n';
    }
    return out;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError(path, "cannot open scenario file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return scenario_from_text(buf.str());
}

inline void save_scenario(const Scenario& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ScenarioError(path, "cannot write scenario file");
    out << scenario_to_text(s);
}

// The recess removes material from one flank of the head. Approaching from
// the recessed side meets a shallower effective joining angle; the other side
// is unaffected. The planar world approaches the left lip from the right.
inline SnapHookProfile effective_hook(const SnapHookProfile& hook) {
    SnapHookProfile h = hook;
    if (h.recess_side == RecessSide::left)
        h.joining_angle -= h.recess_angle_delta;
    return h;
}

} // namespace snapfit
