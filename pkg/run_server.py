import os
import sys
from pathlib import Path
import uvicorn
from dotenv import load_dotenv


def check_requirements():
    """Check that the package and its scenario profiles are in place."""
    print("Checking requirements...")
    print(f"Current directory: {os.getcwd()}")

    env_file = Path('.env')
    if env_file.exists():
        print(f".env file found at: {env_file.absolute()}")
        load_dotenv()
    else:
        print("No .env file, using environment defaults")

    package_dir = Path(__file__).parent / 'vidnetsim'
    if not package_dir.exists():
        print(f"Package directory not found: {package_dir}")
        return False

    profile_dir = Path(os.getenv('VNSIM_PROFILE_DIR', Path(__file__).parent / 'data' / 'profiles'))
    profiles = sorted(profile_dir.glob('*.yaml'))
    if not profiles:
        print(f"No scenario profiles found in: {profile_dir}")
        print("   Set VNSIM_PROFILE_DIR or restore data/profiles/disaster_area.yaml")
        return False
    print(f"Scenario profiles found: {', '.join(p.stem for p in profiles)}")

    print("All requirements check passed!")
    return True


def main():
    """Main function to run the server."""
    print("vidnetsim Experiment Server")
    print("=" * 50)

    if not check_requirements():
        print("\nServer cannot start due to missing requirements")
        sys.exit(1)

    from vidnetsim.settings import get_settings
    settings = get_settings()
    host, port = settings.host, settings.port

    print("\nStarting server...")
    print("vidnetsim API will be available at:")
    print(f"   Local:    http://localhost:{port}")
    print(f"   Network:  http://{host}:{port}")
    print(f"   API Docs: http://localhost:{port}/docs")
    print(f"   Health:   http://localhost:{port}/health")

    print("\nAPI Endpoints:")
    print("   GET  /profiles         - Checked-in scenario profiles")
    print("   POST /config/validate  - Validate a YAML configuration")
    print("   POST /experiments/run  - Run a sweep and write the report")
    print("   POST /score            - Y-PSNR between two raw files")
    print("   GET  /health           - Health check")

    print("\nPress Ctrl+C to stop the server")
    print("=" * 50)

    try:
        project_root = Path(__file__).parent
        sys.path.insert(0, str(project_root))

        from vidnetsim.api.main import app
        from vidnetsim.logging_setup import configure_logging

        configure_logging(settings.log_level)
        uvicorn.run(
            app,
            host=host,
            port=port,
            reload=False,
            log_level="info"
        )

    except ImportError as e:
        print(f"Import error: {e}")
        print("Please ensure all dependencies are installed:")
        print("   pip install -r requirements.txt")
        sys.exit(1)

    except KeyboardInterrupt:
        print("\n\nServer stopped by user")


if __name__ == "__main__":
    main()
