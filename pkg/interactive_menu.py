"""
Tensor Form Compiler - Interactive Menu
"""

from benchmark import BenchmarkRunner
from tfc_main_app import FormCompiler


def print_menu():
    print("\n" + "="*80)
    print("🧮 TENSOR FORM COMPILER INTERACTIVE MENU")
    print("="*80)
    print("""
1.  List corpus forms and meshes
2.  Compile a corpus form
3.  Show signatures and reference tensor groups
4.  Verify a form against direct quadrature
5.  Benchmark naive vs assembled (one form)
6.  Assemble a form on a bundled mesh

0.  Exit
    """)
    print("="*80)


def _ask_form(compiler):
    name = input("\n👉 Form name (e.g. poisson): ").strip()
    if name not in compiler.corpus.form_names():
        print(f"❌ Unknown form! Choose one of: {', '.join(compiler.corpus.form_names())}")
        return None
    degree_input = input("👉 Polynomial degree (press Enter to keep the declared one): ").strip()
    degree = int(degree_input) if degree_input else None
    return compiler.corpus.load_form(name, degree=degree), name


def _ask_mesh(compiler, default):
    name = input(f"👉 Mesh name (press Enter for {default}): ").strip() or default
    return compiler.corpus.load_mesh(name)


def main():
    print("\n🚀 Initializing Tensor Form Compiler...")
    compiler = FormCompiler()
    compiler.initialize()

    while True:
        print_menu()
        choice = input("👉 Enter your choice (0-6): ").strip()

        try:
            if choice == '1':
                print("\n" + "="*80)
                print("📚 CORPUS FORMS")
                print("="*80)
                print(compiler.corpus.list_forms().to_string(index=False))
                print("\n🗺️  MESHES")
                print(compiler.corpus.list_meshes().to_string(index=False))

            elif choice == '2':
                picked = _ask_form(compiler)
                if picked:
                    form, name = picked
                    compiled = compiler.compile(form, stem=name)
                    compiler.show_compilation(compiled)
                    if input("\n👉 Write .prog and .c.txt here? (y/N): ").strip().lower() == 'y':
                        for path in compiler.write_artifacts(compiled):
                            print(f"✓ wrote {path}")

            elif choice == '3':
                picked = _ask_form(compiler)
                if picked:
                    form, name = picked
                    compiler.show_signatures(compiler.compile(form, stem=name))

            elif choice == '4':
                picked = _ask_form(compiler)
                if picked:
                    form, name = picked
                    default = 'unit_square' if form.dimension == 2 else 'unit_cube'
                    mesh = _ask_mesh(compiler, default)
                    seed_input = input("👉 Random seed (press Enter for 0): ").strip()
                    seed = int(seed_input) if seed_input else 0
                    compiled = compiler.compile(form, stem=name)
                    compiler.show_verification(compiler.verify(compiled, mesh, seed=seed))

            elif choice == '5':
                name = input("\n👉 Form name (e.g. mass): ").strip()
                dim = input("👉 Dimension 2 or 3 (press Enter for 2): ").strip() or '2'
                degrees = input("👉 Degrees, e.g. 1-3 (press Enter for 1): ").strip() or '1'
                runner = BenchmarkRunner(compiler, repeats=1)
                runner.show_results(runner.run([f"{name}:{dim}:{degrees}"]))

            elif choice == '6':
                picked = _ask_form(compiler)
                if picked:
                    form, name = picked
                    if form.coefficients:
                        print("❌ Assembly from the menu supports forms without coefficients")
                        continue
                    default = 'unit_square' if form.dimension == 2 else 'unit_cube'
                    mesh = _ask_mesh(compiler, default)
                    tensor = compiler.assemble(form, mesh)
                    print(f"\n✓ Assembled '{name}' on {mesh.num_cells} cells: shape {tensor.shape}")
                    print(f"  Sum of entries: {tensor.sum():.12g}")
                    if tensor.ndim == 2:
                        print(f"  Largest row sum: {abs(tensor.sum(axis=1)).max():.3e}")

            elif choice == '0':
                print("\n" + "="*80)
                print("👋 Thanks for using the Tensor Form Compiler!")
                print("="*80)
                break

            else:
                print("\n❌ Invalid choice! Please enter a number from 0-6.")

        except Exception as e:
            print(f"\n❌ An error occurred: {e}")
            print("Please try again or choose a different option.")


if __name__ == '__main__':
    main()
