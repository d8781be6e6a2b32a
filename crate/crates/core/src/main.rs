fn main() -> std::process::ExitCode {
    thermospec::cli::main_entry()
}
