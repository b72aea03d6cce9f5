#include "gadgex/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace gadgex;

int main(int argc, char **argv) {
    CLI::App app{"gadgex - CFI-compatible code-reuse gadget discovery and search"};
    app.require_subcommand(1);

    Config cfg;

    auto add_common = [&](CLI::App *cmd) {
        cmd->add_option("--seed", cfg.seed, "seed for all randomized steps");
        cmd->add_option("--budget", cfg.budget, "concrete evaluations per check");
        cmd->add_option("--workers", cfg.workers, "worker thread count");
    };

    CLI::App *discover = app.add_subcommand("discover", "scan and extract gadgets");
    discover->add_option("inputs", cfg.inputs, "input .gcfg files")->required();
    discover->add_option("--db", cfg.db_path, "output database")->required();
    discover->add_option("--max-len", cfg.max_len, "maximum gadget length");
    discover->add_option("--fixed-funcs", cfg.fixed_funcs_path,
                         "fixed-function symbols, one per line");
    discover->add_flag("--keep-duplicates", cfg.keep_duplicates,
                       "keep gadgets with identical opcode sequences");
    add_common(discover);

    CLI::App *analyze =
        app.add_subcommand("analyze", "summarize, classify and verify gadgets");
    analyze->add_option("inputs", cfg.inputs, "input .gcfg files")->required();
    analyze->add_option("--db", cfg.db_path, "database to update")->required();
    analyze->add_option("--range", cfg.range, "records per worker batch");
    add_common(analyze);

    CLI::App *search = app.add_subcommand("search", "run a semantic query");
    search->add_option("--db", cfg.db_paths, "database(s), searched in order")
        ->required();
    search->add_option("--query", cfg.query_path, "query file (.gq)")->required();
    add_common(search);

    CLI::App *stats = app.add_subcommand("stats", "category counts for a database");
    stats->add_option("--db", cfg.db_path, "database to read")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) // --help
            return app.exit(e);
        app.exit(e);
        return 2;
    }

    if (discover->parsed())
        return cmd_discover(cfg, std::cout, std::cerr);
    if (analyze->parsed())
        return cmd_analyze(cfg, std::cout, std::cerr);
    if (search->parsed())
        return cmd_search(cfg, std::cout, std::cerr);
    if (stats->parsed())
        return cmd_stats(cfg, std::cout, std::cerr);
    return 2;
}
