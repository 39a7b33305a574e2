// zcb: zero-coupon bond pricing under BK and MBK short-rate models

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "zcb/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Zero-coupon bond pricing under Black-Karasinski and modified BK models"};
    app.require_subcommand(1);
    zcb::CliOptions o;
    std::string engines_csv;
    int order = 0;
    std::string nu;
    bool no_timing = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "JSON run config")->check(CLI::ExistingFile);
        sub->add_option("--preset", o.preset, "built-in preset")
            ->check(CLI::IsMember(zcb::preset_names()));
        sub->add_option("--engines", engines_csv, "comma-separated engine ids");
        sub->add_option("--maturities", o.maturities, "maturities in years")->delimiter(',');
        sub->add_option("--seed", o.seed, "MC seed");
        sub->add_option("--out", o.out_dir, "output directory");
        sub->add_option("--order", order, "RDTM order")->check(CLI::IsMember({1, 2}));
        sub->add_option("--nu", nu, "anchor for the BK transform")->check(CLI::IsMember({"0", "T"}));
        sub->add_flag("--antithetic", o.antithetic, "antithetic MC paths");
        sub->add_flag("--no-timing", no_timing, "skip timing.csv");
        sub->add_option("--fd-space", o.fd_space, "FD space nodes");
        sub->add_option("--fd-time", o.fd_time, "FD time steps");
        sub->add_option("--mc-paths", o.mc_paths, "MC paths");
        sub->add_option("--mc-steps", o.mc_steps, "MC time steps");
        sub->add_option("--mc-scheme", o.mc_scheme, "MC scheme")
            ->check(CLI::IsMember({"EulerZ", "EulerR", "ExactVerhulst"}));
    };
    auto* price = app.add_subcommand("price", "price each maturity with each engine");
    auto* compare = app.add_subcommand("compare", "cross-engine comparison table");
    auto* simulate = app.add_subcommand("simulate", "paired BK / MBK path statistics");
    auto* verify = app.add_subcommand("verify", "invariant and identity checks");
    for (auto* s : {price, compare, simulate, verify}) add_common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? zcb::kOk : zcb::kUsage;
    }

    if (!engines_csv.empty()) {
        std::size_t p = 0;
        while (p <= engines_csv.size()) {
            std::size_t q = engines_csv.find(',', p);
            if (q == std::string::npos) q = engines_csv.size();
            if (q > p) o.engines.push_back(engines_csv.substr(p, q - p));
            p = q + 1;
        }
    }
    if (order) o.rdtm_order = order;
    if (!nu.empty()) o.nu = nu;
    o.timing = !no_timing;

    try {
        if (verify->parsed() && o.config_path.empty() && o.preset.empty()) o.preset = "numE";
        zcb::RunConfig c = zcb::load_run_config(o);
        if (price->parsed()) return zcb::cmd_price(c, o.out_dir, o.timing);
        if (compare->parsed()) return zcb::cmd_compare(c, o.out_dir, o.timing);
        if (simulate->parsed()) return zcb::cmd_simulate(c, o.out_dir);
        return zcb::cmd_verify(c, o.out_dir);
    } catch (const zcb::InputError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return zcb::kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return zcb::kFailure;
    }
}
