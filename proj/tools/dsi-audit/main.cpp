// SPDX-License-Identifier: Apache-2.0
//
// dsi-audit: group-privacy audit pipeline over street imagery metadata.
#include "run.hpp"

#include <iostream>
#include <thread>

int main(int argc, char** argv)
{
    using namespace dsi::cli;

    Globals g;
    g.argv.assign(argv, argv + argc);
    g.threads = std::max(1u, std::thread::hardware_concurrency());
    int rc = kExitOk;

    CLI::App app{"Group-privacy audit toolkit for dense street imagery metadata", "dsi-audit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "dsi-audit 0.1.0");
    app.add_option("--threads", g.threads, "Worker thread cap (results do not depend on it)")
        ->check(CLI::Range(1u, 256u));

    add_ingest(app, g, rc);
    add_coverage(app, g, rc);
    add_eval(app, g, rc);
    add_threshold(app, g, rc);
    add_match_events(app, g, rc);
    add_geofence(app, g, rc);
    add_hotspot(app, g, rc);
    add_cluster(app, g, rc);
    add_ci(app, g, rc);
    add_synth(app, g, rc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const dsi::Error& e) {
        std::cerr << "dsi-audit: " << e.what() << '\n';
        return kExitData;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "dsi-audit: malformed document: " << e.what() << '\n';
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "dsi-audit: " << e.what() << '\n';
        return kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "dsi-audit: " << e.what() << '\n';
        return kExitData;
    }
    return rc;
}
