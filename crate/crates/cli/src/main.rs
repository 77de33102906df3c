fn main() {
    std::process::exit(vortex_cli::run_cli());
}
