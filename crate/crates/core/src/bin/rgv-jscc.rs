fn main() {
    std::process::exit(rgv_jscc::cli::main_entry());
}
