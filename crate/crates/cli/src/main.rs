fn main() -> std::process::ExitCode {
    sacreddetect::main_with(std::env::args_os())
}
