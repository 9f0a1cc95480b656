fn main() {
    glfs::cli::main();
}
